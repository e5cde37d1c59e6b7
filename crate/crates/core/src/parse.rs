//! The model file format: a JSON document with explicit declarations of
//! actions, clocks and energies; undeclared references are errors, never
//! implicit declarations. Equality atoms are desugared to a <=/>= pair.

use std::collections::BTreeSet;

use serde_json::{json, Map, Value};

use crate::model::{
    check_reserved_names, Atom, Edge, EnergyRateMap, EnergyUpdateMap, GuardedMeta, Location, Rel,
    SimpleConstraint, VarRef,
};
use crate::CoreError;

fn perr(msg: impl Into<String>) -> CoreError {
    CoreError::Parse(msg.into())
}

fn identifier(s: &str, what: &str) -> Result<String, CoreError> {
    let ok = !s.is_empty()
        && s.chars().next().map(|c| c.is_ascii_alphabetic() || c == '_').unwrap_or(false)
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ok {
        return Err(perr(format!(
            "{} \"{}\" is not an identifier (letters, digits, underscore)",
            what, s
        )));
    }
    Ok(s.to_string())
}

fn string_array(value: &Value, key: &str) -> Result<Vec<String>, CoreError> {
    let arr = value
        .get(key)
        .ok_or_else(|| perr(format!("missing top-level key \"{}\"", key)))?
        .as_array()
        .ok_or_else(|| perr(format!("\"{}\" must be an array of strings", key)))?;
    arr.iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or_else(|| perr(format!("\"{}\" entries must be strings", key)))
        })
        .collect()
}

fn no_duplicates(names: &[String], what: &str) -> Result<(), CoreError> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(perr(format!("duplicate {} name \"{}\"", what, n)));
        }
    }
    Ok(())
}

struct NameEnv<'a> {
    clocks: &'a [String],
    energies: &'a [String],
}

impl NameEnv<'_> {
    fn resolve(&self, name: &str, context: &str) -> Result<VarRef, CoreError> {
        if let Some(i) = self.clocks.iter().position(|c| c == name) {
            return Ok(VarRef::Clock(i));
        }
        if let Some(i) = self.energies.iter().position(|e| e == name) {
            return Ok(VarRef::Energy(i));
        }
        Err(perr(format!(
            "{}: \"{}\" is not a declared clock or energy",
            context, name
        )))
    }
}

fn parse_constraint(value: &Value, env: &NameEnv, context: &str) -> Result<SimpleConstraint, CoreError> {
    let arr = value
        .as_array()
        .ok_or_else(|| perr(format!("{}: constraint must be an array of [var, op, int]", context)))?;
    let mut atoms = Vec::new();
    for triple in arr {
        let t = triple.as_array().filter(|t| t.len() == 3).ok_or_else(|| {
            perr(format!("{}: constraint atoms are [var, op, int] triples", context))
        })?;
        let var = t[0]
            .as_str()
            .ok_or_else(|| perr(format!("{}: atom variable must be a string", context)))?;
        let op = t[1]
            .as_str()
            .ok_or_else(|| perr(format!("{}: atom operator must be a string", context)))?;
        let bound = t[2]
            .as_i64()
            .ok_or_else(|| perr(format!("{}: atom bound must be an integer", context)))?;
        let var = env.resolve(var, context)?;
        match op {
            "<" => atoms.push(Atom { var, rel: Rel::Lt, bound }),
            "<=" => atoms.push(Atom { var, rel: Rel::Le, bound }),
            ">=" => atoms.push(Atom { var, rel: Rel::Ge, bound }),
            ">" => atoms.push(Atom { var, rel: Rel::Gt, bound }),
            "=" => {
                atoms.push(Atom { var, rel: Rel::Le, bound });
                atoms.push(Atom { var, rel: Rel::Ge, bound });
            }
            other => {
                return Err(perr(format!(
                    "{}: unknown operator \"{}\" (expected <, <=, >=, >, =)",
                    context, other
                )))
            }
        }
    }
    Ok(SimpleConstraint { atoms })
}

fn parse_int_map(
    value: Option<&Value>,
    energies: &[String],
    context: &str,
) -> Result<Vec<i64>, CoreError> {
    let mut out = vec![0i64; energies.len()];
    let Some(value) = value else {
        return Ok(out);
    };
    let map = value
        .as_object()
        .ok_or_else(|| perr(format!("{}: must be an object of energy -> integer", context)))?;
    for (k, v) in map {
        let idx = energies
            .iter()
            .position(|e| e == k)
            .ok_or_else(|| perr(format!("{}: \"{}\" is not a declared energy", context, k)))?;
        out[idx] = v
            .as_i64()
            .ok_or_else(|| perr(format!("{}: value for \"{}\" must be an integer", context, k)))?;
    }
    Ok(out)
}

/// Parse a model document. Syntax errors carry line and column from the
/// JSON reader; semantic errors name the offending entity.
pub fn parse_model(text: &str) -> Result<GuardedMeta, CoreError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| perr(format!("syntax error at line {}, column {}: {}", e.line(), e.column(), e)))?;
    parse_model_value(&value)
}

pub fn parse_model_value(value: &Value) -> Result<GuardedMeta, CoreError> {
    let actions = string_array(value, "actions")?;
    let clocks = string_array(value, "clocks")?;
    let energies = string_array(value, "energies")?;
    for a in &actions {
        identifier(a, "action")?;
    }
    for c in &clocks {
        identifier(c, "clock")?;
    }
    for e in &energies {
        identifier(e, "energy")?;
    }
    no_duplicates(&actions, "action")?;
    no_duplicates(&clocks, "clock")?;
    no_duplicates(&energies, "energy")?;
    {
        let mut all: Vec<String> = clocks.iter().chain(energies.iter()).cloned().collect();
        all.sort();
        no_duplicates(&all, "variable")?;
    }
    let env = NameEnv { clocks: &clocks, energies: &energies };

    let locs = value
        .get("locations")
        .and_then(Value::as_array)
        .ok_or_else(|| perr("missing or non-array \"locations\""))?;
    let mut locations = Vec::new();
    for l in locs {
        let obj = l.as_object().ok_or_else(|| perr("locations entries must be objects"))?;
        let name = obj
            .get("name")
            .and_then(Value::as_str)
            .ok_or_else(|| perr("location without a \"name\""))?
            .to_string();
        if name.is_empty() || name.chars().any(char::is_control) {
            return Err(perr("location names must be non-empty printable strings"));
        }
        let context = format!("location {}", name);
        for key in obj.keys() {
            if !matches!(
                key.as_str(),
                "name" | "invariant" | "rates" | "private" | "final" | "initial" | "labels"
            ) {
                return Err(perr(format!("{}: unknown key \"{}\"", context, key)));
            }
        }
        let invariant = match obj.get("invariant") {
            Some(v) => parse_constraint(v, &env, &context)?,
            None => SimpleConstraint::trivial(),
        };
        let rates = EnergyRateMap(parse_int_map(obj.get("rates"), &energies, &context)?);
        let labels = match obj.get("labels") {
            Some(v) => v
                .as_array()
                .ok_or_else(|| perr(format!("{}: labels must be an array", context)))?
                .iter()
                .map(|x| {
                    x.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| perr(format!("{}: labels must be strings", context)))
                })
                .collect::<Result<BTreeSet<_>, _>>()?,
            None => BTreeSet::new(),
        };
        let flag = |key: &str| obj.get(key).and_then(Value::as_bool).unwrap_or(false);
        locations.push(Location {
            name,
            invariant,
            rates,
            labels,
            is_private: flag("private"),
            is_final: flag("final"),
            is_initial: flag("initial"),
        });
    }
    {
        let names: Vec<String> = locations.iter().map(|l| l.name.clone()).collect();
        no_duplicates(&names, "location")?;
    }

    let edges_value = value
        .get("edges")
        .and_then(Value::as_array)
        .ok_or_else(|| perr("missing or non-array \"edges\""))?;
    let mut edges = Vec::new();
    for e in edges_value {
        let obj = e.as_object().ok_or_else(|| perr("edges entries must be objects"))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "from" | "guard" | "action" | "resets" | "updates" | "to") {
                return Err(perr(format!("edge: unknown key \"{}\"", key)));
            }
        }
        let from = obj
            .get("from")
            .and_then(Value::as_str)
            .ok_or_else(|| perr("edge without \"from\""))?;
        let to = obj.get("to").and_then(Value::as_str).ok_or_else(|| perr("edge without \"to\""))?;
        let context = format!("edge {} -> {}", from, to);
        let source = locations
            .iter()
            .position(|l| l.name == from)
            .ok_or_else(|| perr(format!("{}: \"{}\" is not a declared location", context, from)))?;
        let target = locations
            .iter()
            .position(|l| l.name == to)
            .ok_or_else(|| perr(format!("{}: \"{}\" is not a declared location", context, to)))?;
        let guard = match obj.get("guard") {
            Some(v) => parse_constraint(v, &env, &context)?,
            None => SimpleConstraint::trivial(),
        };
        let action = match obj.get("action") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(
                actions
                    .iter()
                    .position(|a| a == s)
                    .ok_or_else(|| perr(format!("{}: \"{}\" is not a declared action", context, s)))?,
            ),
            Some(_) => return Err(perr(format!("{}: action must be a string or null", context))),
        };
        let resets = match obj.get("resets") {
            None => BTreeSet::new(),
            Some(v) => v
                .as_array()
                .ok_or_else(|| perr(format!("{}: resets must be an array", context)))?
                .iter()
                .map(|x| {
                    let s = x
                        .as_str()
                        .ok_or_else(|| perr(format!("{}: resets must be strings", context)))?;
                    clocks
                        .iter()
                        .position(|c| c == s)
                        .ok_or_else(|| perr(format!("{}: \"{}\" is not a declared clock", context, s)))
                })
                .collect::<Result<BTreeSet<_>, _>>()?,
        };
        let updates = EnergyUpdateMap(parse_int_map(obj.get("updates"), &energies, &context)?);
        edges.push(Edge { source, guard, action, resets, updates, target });
    }

    let meta = GuardedMeta { actions, clocks, energies, locations, edges };
    check_reserved_names(&meta)?;
    // hard structural errors at parse time (the rest is validate() data)
    for e in &meta.edges {
        if meta.locations[e.source].is_final {
            return Err(perr(format!(
                "final location {} has outgoing edge",
                meta.locations[e.source].name
            )));
        }
    }
    Ok(meta)
}

fn constraint_to_value(meta: &GuardedMeta, c: &SimpleConstraint) -> Value {
    Value::Array(
        c.atoms
            .iter()
            .map(|a| {
                json!([
                    crate::model::var_name(meta, a.var),
                    a.rel.as_str(),
                    a.bound
                ])
            })
            .collect(),
    )
}

fn int_map_to_value(names: &[String], values: &[i64]) -> Value {
    let mut map = Map::new();
    for (n, v) in names.iter().zip(values) {
        if *v != 0 {
            map.insert(n.clone(), json!(v));
        }
    }
    Value::Object(map)
}

pub fn serialize_model_value(meta: &GuardedMeta) -> Value {
    json!({
        "actions": meta.actions,
        "clocks": meta.clocks,
        "energies": meta.energies,
        "locations": meta.locations.iter().map(|l| {
            json!({
                "name": l.name,
                "invariant": constraint_to_value(meta, &l.invariant),
                "rates": int_map_to_value(&meta.energies, &l.rates.0),
                "private": l.is_private,
                "final": l.is_final,
                "initial": l.is_initial,
                "labels": l.labels.iter().collect::<Vec<_>>(),
            })
        }).collect::<Vec<_>>(),
        "edges": meta.edges.iter().map(|e| {
            json!({
                "from": meta.locations[e.source].name,
                "guard": constraint_to_value(meta, &e.guard),
                "action": e.action.map(|a| meta.actions[a].clone()),
                "resets": e.resets.iter().map(|c| meta.clocks[*c].clone()).collect::<Vec<_>>(),
                "updates": int_map_to_value(&meta.energies, &e.updates.0),
                "to": meta.locations[e.target].name,
            })
        }).collect::<Vec<_>>(),
    })
}

pub fn serialize_model(meta: &GuardedMeta) -> String {
    serde_json::to_string_pretty(&serialize_model_value(meta)).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "actions": ["go"],
        "clocks": ["x"],
        "energies": [],
        "locations": [
            {"name": "start", "initial": true},
            {"name": "mid", "private": true},
            {"name": "end", "final": true}
        ],
        "edges": [
            {"from": "start", "action": "go", "to": "mid"},
            {"from": "mid", "action": "go", "to": "end"}
        ]
    }"#;

    #[test]
    fn minimal_model_parses() {
        let meta = parse_model(MINIMAL).unwrap();
        assert_eq!(meta.locations.len(), 3);
        assert_eq!(meta.edges.len(), 2);
        assert!(crate::model::validate(&meta).is_empty());
    }

    #[test]
    fn round_trip_is_identity() {
        let meta = parse_model(MINIMAL).unwrap();
        let text = serialize_model(&meta);
        let again = parse_model(&text).unwrap();
        assert_eq!(meta, again);
    }

    #[test]
    fn undeclared_references_fail() {
        let bad = MINIMAL.replace("\"action\": \"go\", \"to\": \"mid\"", "\"action\": \"run\", \"to\": \"mid\"");
        assert!(parse_model(&bad).is_err());
        let bad = MINIMAL.replace("{\"name\": \"mid\", \"private\": true},", "");
        assert!(parse_model(&bad).is_err());
    }

    #[test]
    fn final_outgoing_rejected() {
        let bad = MINIMAL.replace(
            "{\"from\": \"mid\", \"action\": \"go\", \"to\": \"end\"}",
            "{\"from\": \"mid\", \"action\": \"go\", \"to\": \"end\"}, {\"from\": \"end\", \"action\": \"go\", \"to\": \"start\"}",
        );
        let err = parse_model(&bad).unwrap_err();
        assert!(err.to_string().contains("final location"));
    }

    #[test]
    fn equality_desugars() {
        let text = MINIMAL.replace(
            "{\"from\": \"start\", \"action\": \"go\", \"to\": \"mid\"}",
            "{\"from\": \"start\", \"guard\": [[\"x\", \"=\", 2]], \"action\": \"go\", \"to\": \"mid\"}",
        );
        let meta = parse_model(&text).unwrap();
        assert_eq!(meta.edges[0].guard.atoms.len(), 2);
    }

    #[test]
    fn reserved_names_rejected() {
        let bad = MINIMAL.replace("\"clocks\": [\"x\"]", "\"clocks\": [\"ct\"]");
        assert!(parse_model(&bad).is_err());
        let bad = MINIMAL.replace("\"actions\": [\"go\"]", "\"actions\": [\"inc1\"]");
        assert!(parse_model(&bad).is_err());
    }
}
