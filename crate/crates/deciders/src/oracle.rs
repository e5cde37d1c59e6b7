//! Cross-validation of the symbolic deciders against the bounded grid
//! enumerator: an oracle witness of the existential variant must imply a
//! HOLDS verdict, and symbolic counterexamples must be reproducible on
//! one side and unreachable (within bounds) on the other. Disagreements
//! are reported, never silently reconciled.

use std::collections::BTreeSet;

use num::ToPrimitive;
use serde::{Deserialize, Serialize};

use opaq_core::model::GuardedMeta;
use opaq_core::semantics::{accepting_observations, q_int, OracleBounds, Q};
use opaq_core::CoreError;

use crate::{decide, DecideOptions, OpacityQuery, Property, Variant, Verdict, VerdictStatus, Witness};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Agreement {
    Agree,
    Disagree,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub verdict: Verdict,
    pub oracle_found_common: bool,
    pub oracle_private_count: usize,
    pub oracle_public_count: usize,
    pub agreement: Agreement,
    pub notes: Vec<String>,
}

fn vector_to_q(vector: &[u64]) -> Vec<Q> {
    vector.iter().map(|v| q_int(*v as i64)).collect()
}

/// Map a Parikh vector over `(inc_1..inc_k, t, t>0)` or `(t, a, t>0)` or
/// `(a)` / `(inc_1..inc_k)` to the oracle's canonical observation.
fn witness_to_observation(
    alphabet: &[String],
    vector: &[u64],
    property: Property,
) -> Option<(Option<Q>, Vec<Q>)> {
    let mut energies: Vec<(usize, Q)> = Vec::new();
    let mut single_energy: Option<Q> = None;
    let mut ticks: Option<u64> = None;
    let mut frac = false;
    for (name, count) in alphabet.iter().zip(vector) {
        if let Some(rest) = name.strip_prefix("inc") {
            let idx: usize = rest.parse().ok()?;
            energies.push((idx - 1, q_int(*count as i64)));
        } else if name == "a" {
            single_energy = Some(q_int(*count as i64));
        } else if name == "t" {
            ticks = Some(*count);
        } else if name == "t>0" {
            frac = *count > 0;
        } else {
            return None;
        }
    }
    let energy_vec = if let Some(e) = single_energy {
        vec![e]
    } else {
        energies.sort_by_key(|(i, _)| *i);
        energies.into_iter().map(|(_, e)| e).collect()
    };
    let duration = match property {
        Property::En => None,
        Property::EtEn => {
            let t = ticks?;
            if frac {
                // any duration strictly inside (t, t+1); the class is
                // what the observation fixes, pick the midpoint
                Some(q_int(t as i64) + Q::new(1.into(), 2.into()))
            } else {
                Some(q_int(t as i64))
            }
        }
        _ => return None,
    };
    Some((duration, energy_vec))
}

fn duration_class(d: &Q) -> (u64, bool) {
    let floor = d.floor().to_integer().to_u64().unwrap_or(0);
    let frac = d != &q_int(floor as i64);
    (floor, frac)
}

/// Run the decider and the grid oracle and report their agreement.
pub fn oracle_compare(
    meta: &GuardedMeta,
    query: OpacityQuery,
    opts: &DecideOptions,
    bounds: &OracleBounds,
) -> Result<OracleReport, CoreError> {
    let obs = accepting_observations(meta, bounds)?;
    let verdict = decide(meta, query, opts);
    let mut notes = Vec::new();

    // canonical observation sets for the queried property
    let (oracle_priv, oracle_pub): (BTreeSet<String>, BTreeSet<String>) = match query.property {
        Property::En => (
            obs.private_energies.iter().map(|e| format!("{:?}", e)).collect(),
            obs.public_energies.iter().map(|e| format!("{:?}", e)).collect(),
        ),
        Property::EtEn => (
            obs.private_duration_energies
                .iter()
                .map(|(d, e)| format!("{:?}|{:?}", duration_class(d), e))
                .collect(),
            obs.public_duration_energies
                .iter()
                .map(|(d, e)| format!("{:?}|{:?}", duration_class(d), e))
                .collect(),
        ),
        Property::De => (
            obs.private_deo.iter().map(|t| t.render()).collect(),
            obs.public_deo.iter().map(|t| t.render()).collect(),
        ),
        Property::Bde => (
            obs.private_bdeo.iter().map(|t| t.render()).collect(),
            obs.public_bdeo.iter().map(|t| t.render()).collect(),
        ),
    };
    let common: BTreeSet<&String> = oracle_priv.intersection(&oracle_pub).collect();
    let oracle_found_common = !common.is_empty();

    let agreement = match verdict.status {
        VerdictStatus::Unsupported | VerdictStatus::Resource => {
            notes.push("decider did not produce a verdict for this class".into());
            Agreement::Inconclusive
        }
        VerdictStatus::Holds | VerdictStatus::Fails => match query.variant {
            Variant::Exists => {
                if oracle_found_common && verdict.status == VerdictStatus::Fails {
                    notes.push(format!(
                        "oracle found a common observation {:?} but the decider says FAILS",
                        common.iter().next()
                    ));
                    Agreement::Disagree
                } else if oracle_found_common {
                    Agreement::Agree
                } else if verdict.status == VerdictStatus::Fails {
                    notes.push("no common observation within bounds; FAILS consistent".into());
                    Agreement::Agree
                } else {
                    notes.push(
                        "decider HOLDS but the bounded oracle found no witness (bounds may be \
too small)"
                            .into(),
                    );
                    Agreement::Inconclusive
                }
            }
            Variant::Weak | Variant::Full => {
                // check symbolic counterexample vectors against the oracle
                match (&verdict.status, &verdict.witness) {
                    (
                        VerdictStatus::Fails,
                        Some(Witness::CounterexampleVector { alphabet, vector }),
                    ) => match witness_to_observation(alphabet, vector, query.property) {
                        Some((duration, energies)) => {
                            let key = match (query.property, duration) {
                                (Property::En, _) => format!("{:?}", energies),
                                (Property::EtEn, Some(d)) => {
                                    format!("{:?}|{:?}", duration_class(&d), energies)
                                }
                                _ => format!("{:?}", energies),
                            };
                            let missing_side_has = oracle_priv.contains(&key) || {
                                // the counterexample may come from either side
                                oracle_pub.contains(&key)
                            };
                            let both = oracle_priv.contains(&key) && oracle_pub.contains(&key);
                            if both {
                                notes.push(format!(
                                    "counterexample {} is oracle-reachable on both sides",
                                    key
                                ));
                                Agreement::Disagree
                            } else if missing_side_has {
                                Agreement::Agree
                            } else {
                                notes.push(format!(
                                    "counterexample {} not reached within oracle bounds",
                                    key
                                ));
                                Agreement::Inconclusive
                            }
                        }
                        None => {
                            notes.push("counterexample alphabet not oracle-comparable".into());
                            Agreement::Inconclusive
                        }
                    },
                    (VerdictStatus::Fails, _) => {
                        notes.push("inclusion failure carries no vector witness".into());
                        Agreement::Inconclusive
                    }
                    (VerdictStatus::Holds, _) => {
                        // the bounded public set under-approximates, so a
                        // missing match never disproves an inclusion
                        let unmatched: Vec<&String> =
                            oracle_priv.difference(&oracle_pub).take(3).collect();
                        if unmatched.is_empty() {
                            Agreement::Agree
                        } else {
                            notes.push(format!(
                                "{} bounded private observations lack bounded public matches \
(expected for under-approximate bounds): {:?}",
                                oracle_priv.difference(&oracle_pub).count(),
                                unmatched
                            ));
                            Agreement::Inconclusive
                        }
                    }
                    _ => Agreement::Inconclusive,
                }
            }
        },
    };

    Ok(OracleReport {
        verdict,
        oracle_found_common,
        oracle_private_count: oracle_priv.len(),
        oracle_public_count: oracle_pub.len(),
        agreement,
        notes,
    })
}
