//! Model-to-model constructions: the public- and private-run automata,
//! energy-guard removal by copy tracking, update splitting with inc/dec
//! relabelling, tick-clock instrumentation in its three flavours, and
//! the integer-switching checks and discretization.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{
    classify, Atom, Edge, EnergyRateMap, EnergyUpdateMap, GuardedMeta, Location, Rel,
    SimpleConstraint, VarRef,
};
use crate::regions::{build_region_automaton, ClockPos};
use crate::CoreError;

/// Which final-tick and flush actions the instrumentation emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickMode {
    /// Integer exits via `t`, non-integer exits via `t>0`.
    EtEn,
    /// Both exits via `t`: the attacker observes the last, possibly
    /// partial, time unit without learning its length.
    De,
    /// Update blocks are flushed with `f`; integer exits via `t`,
    /// non-integer exits are silent.
    Bde,
}

/// All accepting runs of the result are the public runs of the input:
/// private locations and every edge touching them are removed.
pub fn remove_private(meta: &GuardedMeta) -> GuardedMeta {
    let keep: Vec<usize> =
        (0..meta.locations.len()).filter(|i| !meta.locations[*i].is_private).collect();
    let index: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(n, o)| (*o, n)).collect();
    let locations: Vec<Location> = keep.iter().map(|i| meta.locations[*i].clone()).collect();
    let edges = meta
        .edges
        .iter()
        .filter_map(|e| {
            let source = *index.get(&e.source)?;
            let target = *index.get(&e.target)?;
            Some(Edge { source, target, ..e.clone() })
        })
        .collect();
    GuardedMeta { locations, edges, ..meta.clone() }
}

/// Two copies tracking "a private location was visited"; accepting runs
/// of the result correspond exactly to the private runs of the input.
pub fn duplicate_visited(meta: &GuardedMeta) -> GuardedMeta {
    let n = meta.locations.len();
    let mut locations = Vec::with_capacity(2 * n);
    // copy 0: not yet visited; copy 1: visited
    for copy in 0..2 {
        for l in &meta.locations {
            let mut loc = l.clone();
            loc.name = format!("{}#{}", l.name, if copy == 0 { "nv" } else { "v" });
            loc.is_initial = false;
            loc.is_final = copy == 1 && l.is_final;
            locations.push(loc);
        }
    }
    let init = meta.initial_index().expect("validated model");
    let init_copy = usize::from(meta.locations[init].is_private);
    locations[init_copy * n + init].is_initial = true;
    let mut edges = Vec::new();
    for e in &meta.edges {
        let target_private = meta.locations[e.target].is_private;
        // visited copy keeps everything
        edges.push(Edge { source: n + e.source, target: n + e.target, ..e.clone() });
        // not-visited copy: redirect edges entering a private location
        let target = if target_private { n + e.target } else { e.target };
        edges.push(Edge { source: e.source, target, ..e.clone() });
    }
    GuardedMeta { locations, edges, ..meta.clone() }
}

fn energy_value_after(v: Option<i64>, update: i64, m_e: i64) -> Option<i64> {
    // None encodes "above m_e"
    match v {
        None => None,
        Some(x) => {
            let y = x + update;
            if y > m_e {
                None
            } else {
                Some(y)
            }
        }
    }
}

fn energy_atom_holds(value: Option<i64>, rel: Rel, bound: i64, m_e: i64) -> bool {
    match value {
        Some(v) => rel.holds_i64(v, bound),
        None => match rel {
            // the tracked value is strictly above m_e >= every bound
            Rel::Ge | Rel::Gt => bound <= m_e,
            Rel::Lt | Rel::Le => false,
        },
    }
}

/// Energy-guard removal for discrete positive inputs: copies track each
/// guarded energy's value in {0..m_e, >m_e}; energy atoms are evaluated
/// per copy and disappear from guards and invariants. Only reachable
/// copies are materialized. The result has the same timed language and
/// the same final energies (updates are kept).
pub fn remove_energy_guards(meta: &GuardedMeta) -> Result<GuardedMeta, CoreError> {
    let report = classify(meta);
    if !report.is_discrete || !report.is_positive {
        return Err(CoreError::Unsupported(
            "energy-guard removal needs a discrete positive input".into(),
        ));
    }
    if !report.is_guarded {
        return Ok(meta.clone());
    }
    let m_e = meta.max_energy_constant();
    // only energies that appear in some energy atom need tracking
    let mut tracked: BTreeSet<usize> = BTreeSet::new();
    for c in meta
        .locations
        .iter()
        .map(|l| &l.invariant)
        .chain(meta.edges.iter().map(|e| &e.guard))
    {
        for a in c.energy_atoms() {
            if let VarRef::Energy(i) = a.var {
                tracked.insert(i);
            }
        }
    }
    let tracked: Vec<usize> = tracked.into_iter().collect();
    type Copy_ = Vec<Option<i64>>;
    let init_loc = meta
        .initial_index()
        .ok_or_else(|| CoreError::Semantics("model has no initial location".into()))?;
    let zero_copy: Copy_ = vec![Some(0); tracked.len()];

    let copy_name = |loc: usize, copy: &Copy_| {
        let vals: Vec<String> = copy
            .iter()
            .map(|v| match v {
                Some(x) => x.to_string(),
                None => format!(">{}", m_e),
            })
            .collect();
        format!("{}@{}", meta.locations[loc].name, vals.join(","))
    };
    let eval_energy_atoms = |c: &SimpleConstraint, copy: &Copy_| -> bool {
        c.energy_atoms().all(|a| {
            let VarRef::Energy(i) = a.var else { unreachable!() };
            match tracked.iter().position(|t| *t == i) {
                Some(k) => energy_atom_holds(copy[k], a.rel, a.bound, m_e),
                None => unreachable!("atom over untracked energy"),
            }
        })
    };
    let clock_only = |c: &SimpleConstraint| SimpleConstraint {
        atoms: c.clock_atoms().copied().collect(),
    };

    let mut locations: Vec<Location> = Vec::new();
    let mut index: BTreeMap<(usize, Copy_), usize> = BTreeMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut queue: Vec<(usize, Copy_)> = Vec::new();
    let push_state = |loc: usize,
                          copy: Copy_,
                          locations: &mut Vec<Location>,
                          queue: &mut Vec<(usize, Copy_)>,
                          index: &mut BTreeMap<(usize, Copy_), usize>| {
        let key = (loc, copy);
        match index.get(&key) {
            Some(i) => *i,
            None => {
                let l = &meta.locations[key.0];
                locations.push(Location {
                    name: copy_name(key.0, &key.1),
                    invariant: clock_only(&l.invariant),
                    rates: l.rates.clone(),
                    labels: l.labels.clone(),
                    is_private: l.is_private,
                    is_final: l.is_final,
                    is_initial: false,
                });
                let i = locations.len() - 1;
                index.insert(key.clone(), i);
                queue.push(key);
                i
            }
        }
    };
    let start = push_state(init_loc, zero_copy.clone(), &mut locations, &mut queue, &mut index);
    locations[start].is_initial = true;
    let mut cursor = 0;
    while cursor < queue.len() {
        let (loc, copy) = queue[cursor].clone();
        cursor += 1;
        let from = index[&(loc, copy.clone())];
        if !eval_energy_atoms(&meta.locations[loc].invariant, &copy) {
            continue; // dead: the location's own energy invariant fails
        }
        for (_, e) in meta.edges_from(loc) {
            if !eval_energy_atoms(&e.guard, &copy) {
                continue;
            }
            let mut next_copy = copy.clone();
            for (k, t) in tracked.iter().enumerate() {
                next_copy[k] = energy_value_after(copy[k], e.updates.0[*t], m_e);
            }
            if !eval_energy_atoms(&meta.locations[e.target].invariant, &next_copy) {
                continue;
            }
            let to = push_state(e.target, next_copy, &mut locations, &mut queue, &mut index);
            edges.push(Edge {
                source: from,
                guard: clock_only(&e.guard),
                action: e.action,
                resets: e.resets.clone(),
                updates: e.updates.clone(),
                target: to,
            });
        }
    }
    Ok(GuardedMeta { locations, edges, ..meta.clone() })
}

/// Result of splitting updates into unit steps and relabelling them as
/// inc/dec actions: an energy-free automaton plus the bookkeeping the
/// instrumentation needs.
#[derive(Debug, Clone)]
pub struct SplitRelabel {
    pub ta: GuardedMeta,
    /// Indices of the fresh urgent locations inside split chains.
    pub intermediates: BTreeSet<usize>,
    /// Marker action name -> energy atoms it stands for (single energy).
    pub markers: BTreeMap<String, Vec<(Rel, i64)>>,
}

pub fn inc_action(i: usize) -> String {
    format!("inc{}", i + 1)
}

pub fn dec_action(i: usize) -> String {
    format!("dec{}", i + 1)
}

fn marker_name(atoms: &[(Rel, i64)]) -> String {
    let parts: Vec<String> =
        atoms.iter().map(|(r, b)| format!("{}{}", r.as_str(), b)).collect();
    format!("g:{}", parts.join("&"))
}

/// Split every edge with a non-unit update vector into consecutive unit
/// steps in zero time, relabel unit increments and decrements as inc/dec
/// actions, erase original actions, and delete the energy variables.
///
/// With `keep_markers` (single-energy inputs only), energy atoms of
/// guards and target invariants survive as marker actions checked in
/// zero time before and after the unit steps.
pub fn split_and_relabel(meta: &GuardedMeta, keep_markers: bool) -> Result<SplitRelabel, CoreError> {
    let report = classify(meta);
    if !report.is_discrete {
        return Err(CoreError::Unsupported(
            "update splitting needs a discrete input (all rates zero)".into(),
        ));
    }
    if !keep_markers && report.is_guarded {
        return Err(CoreError::Unsupported(
            "update splitting on a guarded input needs the marker-keeping variant".into(),
        ));
    }
    if keep_markers && meta.energies.len() != 1 {
        return Err(CoreError::Unsupported(
            "marker-keeping splitting works on a single energy variable".into(),
        ));
    }
    let n_energies = meta.energies.len();
    let needs_cz = meta.edges.iter().any(|e| {
        let units: i64 = e.updates.0.iter().map(|u| u.abs()).sum();
        let markers = if keep_markers {
            usize::from(e.guard.has_energy_atom())
                + usize::from(meta.locations[e.target].invariant.has_energy_atom())
        } else {
            0
        };
        units + markers as i64 > 1
    });
    let cz = meta.fresh_clock_name("cz");
    let mut clocks = meta.clocks.clone();
    let cz_idx = if needs_cz {
        clocks.push(cz);
        Some(clocks.len() - 1)
    } else {
        None
    };

    let mut actions: Vec<String> = Vec::new();
    for i in 0..n_energies {
        actions.push(inc_action(i));
    }
    for i in 0..n_energies {
        actions.push(dec_action(i));
    }
    let mut markers: BTreeMap<String, Vec<(Rel, i64)>> = BTreeMap::new();
    let mut marker_action = |atoms: Vec<(Rel, i64)>, actions: &mut Vec<String>| -> usize {
        let name = marker_name(&atoms);
        if let Some(i) = actions.iter().position(|a| a == &name) {
            return i;
        }
        actions.push(name.clone());
        markers.insert(name, atoms);
        actions.len() - 1
    };

    let clock_only = |c: &SimpleConstraint| SimpleConstraint {
        atoms: c.clock_atoms().copied().collect(),
    };
    let mut locations: Vec<Location> = meta
        .locations
        .iter()
        .map(|l| Location {
            name: l.name.clone(),
            invariant: clock_only(&l.invariant),
            rates: EnergyRateMap(Vec::new()),
            labels: l.labels.clone(),
            is_private: l.is_private,
            is_final: l.is_final,
            is_initial: l.is_initial,
        })
        .collect();
    let mut intermediates = BTreeSet::new();
    let mut edges: Vec<Edge> = Vec::new();

    for (edge_no, e) in meta.edges.iter().enumerate() {
        // chain of actions this edge becomes
        let mut chain: Vec<Option<usize>> = Vec::new();
        if keep_markers {
            let atoms: Vec<(Rel, i64)> =
                e.guard.energy_atoms().map(|a| (a.rel, a.bound)).collect();
            if !atoms.is_empty() {
                chain.push(Some(marker_action(atoms, &mut actions)));
            }
        }
        for (i, u) in e.updates.0.iter().enumerate() {
            let action = if *u > 0 { inc_action(i) } else { dec_action(i) };
            let id = actions.iter().position(|a| a == &action).expect("declared");
            for _ in 0..u.abs() {
                chain.push(Some(id));
            }
        }
        if keep_markers {
            let atoms: Vec<(Rel, i64)> = meta.locations[e.target]
                .invariant
                .energy_atoms()
                .map(|a| (a.rel, a.bound))
                .collect();
            if !atoms.is_empty() {
                chain.push(Some(marker_action(atoms, &mut actions)));
            }
        }
        if chain.is_empty() {
            chain.push(None); // silent edge
        }
        let mut guard = clock_only(&e.guard);
        let mut resets = e.resets.clone();
        if chain.len() > 1 {
            resets.insert(cz_idx.expect("cz allocated"));
        }
        let mut source = e.source;
        for (k, action) in chain.iter().enumerate() {
            let last = k == chain.len() - 1;
            let target = if last {
                e.target
            } else {
                let cz_i = cz_idx.expect("cz allocated");
                let mut mid = Location::plain(
                    format!("{}~{}#{}", meta.locations[e.source].name, edge_no, k),
                    0,
                );
                mid.invariant = SimpleConstraint {
                    atoms: vec![Atom { var: VarRef::Clock(cz_i), rel: Rel::Le, bound: 0 }],
                };
                locations.push(mid);
                intermediates.insert(locations.len() - 1);
                locations.len() - 1
            };
            edges.push(Edge {
                source,
                guard: std::mem::take(&mut guard),
                action: *action,
                resets: std::mem::take(&mut resets),
                updates: EnergyUpdateMap(Vec::new()),
                target,
            });
            source = target;
        }
    }

    let ta = GuardedMeta {
        actions,
        clocks,
        energies: Vec::new(),
        locations,
        edges,
    };
    Ok(SplitRelabel { ta, intermediates, markers })
}

fn atom(var: VarRef, rel: Rel, bound: i64) -> Atom {
    Atom { var, rel, bound }
}

/// Tick-clock instrumentation. A fresh clock ct with global invariant
/// ct <= 1 ticks via action `t` (guard ct = 1, resetting ct) on every
/// location where time can elapse; original guards are strengthened with
/// 0 < ct <= 1 so that all updates of a time unit precede its tick. A
/// time-zero prefix copy with invariant ct = 0 permits updates at
/// absolute time 0. Finals become urgent, with exits to a fresh true
/// final per the mode.
pub fn add_tick_instrumentation(split: &SplitRelabel, mode: TickMode) -> Result<GuardedMeta, CoreError> {
    let ta = &split.ta;
    if !ta.energies.is_empty() {
        return Err(CoreError::Unsupported(
            "instrumentation expects a split, energy-free automaton".into(),
        ));
    }
    let init = ta
        .initial_index()
        .ok_or_else(|| CoreError::Semantics("model has no initial location".into()))?;
    let mut clocks = ta.clocks.clone();
    let ct_name = ta.fresh_clock_name("ct");
    clocks.push(ct_name);
    let ct = clocks.len() - 1;
    let cz = match ta.clocks.iter().position(|c| c == "cz") {
        Some(i) => i,
        None => {
            clocks.push("cz".to_string());
            clocks.len() - 1
        }
    };

    let mut actions = ta.actions.clone();
    let t_action = {
        actions.push("t".to_string());
        actions.len() - 1
    };
    let tpos_action = match mode {
        TickMode::EtEn => {
            actions.push("t>0".to_string());
            Some(actions.len() - 1)
        }
        _ => None,
    };
    let f_action = match mode {
        TickMode::Bde => {
            actions.push("f".to_string());
            Some(actions.len() - 1)
        }
        _ => None,
    };

    let n = ta.locations.len();
    let mut locations: Vec<Location> = Vec::new();
    // main copy: indices 0..n ; zero copy: n..2n
    for l in &ta.locations {
        let mut loc = l.clone();
        loc.is_initial = false;
        loc.is_final = false;
        loc.invariant.atoms.push(atom(VarRef::Clock(ct), Rel::Le, 1));
        if l.is_final {
            loc.invariant.atoms.push(atom(VarRef::Clock(cz), Rel::Le, 0));
        }
        locations.push(loc);
    }
    for l in &ta.locations {
        let mut loc = l.clone();
        loc.name = format!("{}°", l.name);
        loc.is_initial = false;
        loc.is_final = false;
        loc.invariant.atoms.push(atom(VarRef::Clock(ct), Rel::Le, 0));
        locations.push(loc);
    }
    locations[n + init].is_initial = true;
    // one true final per original final location
    let mut true_final: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, l) in ta.locations.iter().enumerate() {
        if l.is_final {
            let mut fin = Location::plain(format!("{}'", l.name), 0);
            fin.is_final = true;
            locations.push(fin);
            true_final.insert(i, locations.len() - 1);
        }
    }

    let inc_dec: BTreeSet<usize> = ta
        .actions
        .iter()
        .enumerate()
        .filter(|(_, a)| a.starts_with("inc") || a.starts_with("dec"))
        .map(|(i, _)| i)
        .collect();

    let mut edges: Vec<Edge> = Vec::new();
    let mut flush_targets: Vec<(usize, usize)> = Vec::new(); // (edge idx, final target)
    for e in &ta.edges {
        // main copy, strengthened so updates precede the tick
        let mut main = e.clone();
        main.guard.atoms.push(atom(VarRef::Clock(ct), Rel::Gt, 0));
        main.guard.atoms.push(atom(VarRef::Clock(ct), Rel::Le, 1));
        if ta.locations[e.target].is_final {
            main.resets.insert(cz);
        }
        // zero copy, unstrengthened: updates at absolute time 0
        let mut zero = e.clone();
        zero.source += n;
        zero.target += n;
        if ta.locations[e.target].is_final {
            zero.resets.insert(cz);
        }
        let flush_here = mode == TickMode::Bde
            && e.action.map(|a| inc_dec.contains(&a)).unwrap_or(false)
            && !split.intermediates.contains(&e.target);
        edges.push(main);
        if flush_here {
            flush_targets.push((edges.len() - 1, 0));
        }
        edges.push(zero);
        if flush_here {
            flush_targets.push((edges.len() - 1, 1));
        }
    }
    // flush hops: route the edge through a fresh urgent location and emit f
    if let Some(f) = f_action {
        for (edge_idx, copy) in flush_targets {
            let target = edges[edge_idx].target;
            let mut mid = Location::plain(
                format!("{}»f{}", locations[edges[edge_idx].source].name, edge_idx),
                0,
            );
            mid.invariant.atoms.push(atom(VarRef::Clock(cz), Rel::Le, 0));
            if copy == 1 {
                mid.invariant.atoms.push(atom(VarRef::Clock(ct), Rel::Le, 0));
            }
            locations.push(mid);
            let mid_idx = locations.len() - 1;
            edges[edge_idx].target = mid_idx;
            edges[edge_idx].resets.insert(cz);
            edges.push(Edge {
                source: mid_idx,
                guard: SimpleConstraint::trivial(),
                action: Some(f),
                resets: if ta.locations[target % n].is_final && target < n {
                    BTreeSet::from([cz])
                } else {
                    BTreeSet::new()
                },
                updates: EnergyUpdateMap(Vec::new()),
                target,
            });
        }
    }
    // bridges from the zero copy into the main copy
    for i in 0..n {
        let mut resets = BTreeSet::new();
        if ta.locations[i].is_final {
            resets.insert(cz);
        }
        edges.push(Edge {
            source: n + i,
            guard: SimpleConstraint::trivial(),
            action: None,
            resets,
            updates: EnergyUpdateMap(Vec::new()),
            target: i,
        });
    }
    // tick self-loops on main locations where time can elapse
    for (i, l) in ta.locations.iter().enumerate() {
        if l.is_final || split.intermediates.contains(&i) {
            continue;
        }
        edges.push(Edge {
            source: i,
            guard: SimpleConstraint {
                atoms: vec![
                    atom(VarRef::Clock(ct), Rel::Ge, 1),
                    atom(VarRef::Clock(ct), Rel::Le, 1),
                ],
            },
            action: Some(t_action),
            resets: BTreeSet::from([ct]),
            updates: EnergyUpdateMap(Vec::new()),
            target: i,
        });
    }
    // final exits
    for (orig, fin) in &true_final {
        let integer_guard = SimpleConstraint {
            atoms: vec![
                atom(VarRef::Clock(ct), Rel::Ge, 1),
                atom(VarRef::Clock(ct), Rel::Le, 1),
            ],
        };
        let frac_guard = SimpleConstraint {
            atoms: vec![
                atom(VarRef::Clock(ct), Rel::Gt, 0),
                atom(VarRef::Clock(ct), Rel::Lt, 1),
            ],
        };
        edges.push(Edge {
            source: *orig,
            guard: integer_guard,
            action: Some(t_action),
            resets: BTreeSet::new(),
            updates: EnergyUpdateMap(Vec::new()),
            target: *fin,
        });
        let frac_action = match mode {
            TickMode::EtEn => Some(tpos_action.expect("t>0 declared")),
            TickMode::De => Some(t_action),
            TickMode::Bde => None,
        };
        edges.push(Edge {
            source: *orig,
            guard: frac_guard,
            action: frac_action,
            resets: BTreeSet::new(),
            updates: EnergyUpdateMap(Vec::new()),
            target: *fin,
        });
        // a run of duration zero exits from the prefix copy directly
        edges.push(Edge {
            source: n + *orig,
            guard: SimpleConstraint::trivial(),
            action: None,
            resets: BTreeSet::new(),
            updates: EnergyUpdateMap(Vec::new()),
            target: *fin,
        });
    }

    Ok(GuardedMeta {
        actions,
        clocks,
        energies: Vec::new(),
        locations,
        edges,
    })
}

/// Semantic integer-switching / integer-execution-time checks via the
/// tick-instrumented region graph of the (unguarded) input: rate changes
/// may only fire where the tick clock has a zero fractional part, and
/// finals may only be entered there.
pub fn integer_switch_checks(meta: &GuardedMeta) -> Result<(bool, bool), CoreError> {
    let report = classify(meta);
    if report.is_guarded {
        return Err(CoreError::Unsupported(
            "integer-switching checks are only available for unguarded inputs".into(),
        ));
    }
    // clock-only shadow with an observation tick clock
    let mut shadow = GuardedMeta {
        actions: meta.actions.clone(),
        clocks: meta.clocks.clone(),
        energies: Vec::new(),
        locations: meta
            .locations
            .iter()
            .map(|l| Location {
                name: l.name.clone(),
                invariant: SimpleConstraint { atoms: l.invariant.clock_atoms().copied().collect() },
                rates: EnergyRateMap(Vec::new()),
                labels: l.labels.clone(),
                is_private: l.is_private,
                is_final: l.is_final,
                is_initial: l.is_initial,
            })
            .collect(),
        edges: meta
            .edges
            .iter()
            .map(|e| Edge {
                source: e.source,
                guard: SimpleConstraint { atoms: e.guard.clock_atoms().copied().collect() },
                action: e.action,
                resets: e.resets.clone(),
                updates: EnergyUpdateMap(Vec::new()),
                target: e.target,
            })
            .collect(),
    };
    let n_original_edges = shadow.edges.len();
    let ct_name = shadow.fresh_clock_name("ct");
    shadow.clocks.push(ct_name);
    let ct = shadow.clocks.len() - 1;
    for l in &mut shadow.locations {
        l.invariant.atoms.push(atom(VarRef::Clock(ct), Rel::Le, 1));
    }
    for i in 0..shadow.locations.len() {
        if shadow.locations[i].is_final {
            continue;
        }
        shadow.edges.push(Edge {
            source: i,
            guard: SimpleConstraint {
                atoms: vec![
                    atom(VarRef::Clock(ct), Rel::Ge, 1),
                    atom(VarRef::Clock(ct), Rel::Le, 1),
                ],
            },
            action: None,
            resets: BTreeSet::from([ct]),
            updates: EnergyUpdateMap(Vec::new()),
            target: i,
        });
    }
    let ra = build_region_automaton(&shadow)?;
    let mut is_is = true;
    let mut is_iet = true;
    for (k, (from, _, _)) in ra.nfa.edges.iter().enumerate() {
        let Some(edge_idx) = ra.provenance[k] else { continue };
        if edge_idx >= n_original_edges {
            continue; // the added tick loop
        }
        let e = &meta.edges[edge_idx];
        let src_region = &ra.states[*from].1;
        let frac_nonzero = matches!(src_region.pos[ct], ClockPos::In(_));
        if !frac_nonzero {
            continue;
        }
        if meta.locations[e.target].is_final {
            is_iet = false;
        } else if meta.locations[e.source].rates != meta.locations[e.target].rates {
            is_is = false;
        }
    }
    Ok((is_is, is_iet))
}

/// The integer-switching discretization: rates become discrete updates
/// applied by a silent tick loop every time unit; original guards are
/// strengthened with ct < 1 so they fire after the tick's update.
pub fn integer_switch_to_discrete(meta: &GuardedMeta) -> Result<GuardedMeta, CoreError> {
    let (is_is, _) = integer_switch_checks(meta)?;
    if !is_is {
        return Err(CoreError::Unsupported(
            "the input changes energy rates at non-integer times".into(),
        ));
    }
    let mut out = meta.clone();
    let ct_name = out.fresh_clock_name("ct");
    out.clocks.push(ct_name);
    let ct = out.clocks.len() - 1;
    for l in &mut out.locations {
        l.invariant.atoms.push(atom(VarRef::Clock(ct), Rel::Le, 1));
    }
    for e in &mut out.edges {
        e.guard.atoms.push(atom(VarRef::Clock(ct), Rel::Lt, 1));
    }
    for i in 0..out.locations.len() {
        if out.locations[i].is_final {
            continue;
        }
        let rates = meta.locations[i].rates.0.clone();
        out.edges.push(Edge {
            source: i,
            guard: SimpleConstraint {
                atoms: vec![
                    atom(VarRef::Clock(ct), Rel::Ge, 1),
                    atom(VarRef::Clock(ct), Rel::Le, 1),
                ],
            },
            action: None,
            resets: BTreeSet::from([ct]),
            updates: EnergyUpdateMap(rates),
            target: i,
        });
    }
    for l in &mut out.locations {
        l.rates = EnergyRateMap(vec![0; meta.energies.len()]);
    }
    Ok(out)
}
