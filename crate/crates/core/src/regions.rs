//! Clock-region equivalence and the region automaton: the finite
//! quotient of a timed automaton's state space on which every decision
//! pipeline runs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num::rational::BigRational;
use num::Zero;

use opaq_lang::nfa::Nfa;

use crate::model::GuardedMeta;
use crate::semantics::{q_int, ConcreteState, Q};
use crate::CoreError;

/// Position of one clock inside a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ClockPos {
    /// Exactly the integer n (n <= M).
    At(i64),
    /// Strictly between n and n+1 (n < M).
    In(i64),
    /// Above the clock's maximal constant.
    Saturated,
}

/// A clock region: integer part or saturation per clock, plus the total
/// order over the fractional parts of the clocks strictly inside a unit
/// interval, as groups of equal fractions listed in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ClockRegion {
    pub pos: Vec<ClockPos>,
    pub frac_order: Vec<BTreeSet<usize>>,
}

impl ClockRegion {
    pub fn is_unbounded(&self) -> bool {
        self.pos.iter().all(|p| matches!(p, ClockPos::Saturated))
    }

    pub fn zero(n_clocks: usize) -> ClockRegion {
        ClockRegion { pos: vec![ClockPos::At(0); n_clocks], frac_order: Vec::new() }
    }

    /// A concrete valuation inside the region: integers at integer
    /// positions, fractions i+1/(g+1) by group rank, M+1 for saturated.
    pub fn representative(&self, max_consts: &[i64]) -> Vec<Q> {
        let groups = self.frac_order.len() as i64;
        let mut out = vec![Q::zero(); self.pos.len()];
        for (i, p) in self.pos.iter().enumerate() {
            out[i] = match p {
                ClockPos::At(n) => q_int(*n),
                ClockPos::In(n) => {
                    let rank = self
                        .frac_order
                        .iter()
                        .position(|g| g.contains(&i))
                        .expect("fractional clock in order") as i64;
                    q_int(*n) + BigRational::new((rank + 1).into(), (groups + 1).into())
                }
                ClockPos::Saturated => q_int(max_consts[i] + 1),
            };
        }
        out
    }

    /// Readable constraint string, e.g. "x=1, 0<y<1".
    pub fn describe(&self, clock_names: &[String], max_consts: &[i64]) -> String {
        let mut parts = Vec::new();
        for (i, p) in self.pos.iter().enumerate() {
            match p {
                ClockPos::At(n) => parts.push(format!("{}={}", clock_names[i], n)),
                ClockPos::In(n) => {
                    parts.push(format!("{}<{}<{}", n, clock_names[i], n + 1))
                }
                ClockPos::Saturated => {
                    parts.push(format!("{}>{}", clock_names[i], max_consts[i]))
                }
            }
        }
        for w in self.frac_order.windows(2) {
            let lhs: Vec<&str> =
                w[0].iter().map(|i| clock_names[*i].as_str()).collect();
            let rhs: Vec<&str> =
                w[1].iter().map(|i| clock_names[*i].as_str()).collect();
            parts.push(format!("frac({})<frac({})", lhs.join(","), rhs.join(",")));
        }
        parts.join(", ")
    }
}

/// The region of a clock valuation: two valuations map to the same
/// region iff they agree on integer parts (below saturation), zero
/// fractions, and the order of fractional parts.
pub fn clock_region_of(valuation: &[Q], max_consts: &[i64]) -> ClockRegion {
    assert_eq!(valuation.len(), max_consts.len());
    let mut pos = Vec::with_capacity(valuation.len());
    let mut fracs: Vec<(Q, usize)> = Vec::new();
    for (i, v) in valuation.iter().enumerate() {
        assert!(v >= &Q::zero(), "clock valuations are non-negative");
        if v > &q_int(max_consts[i]) {
            pos.push(ClockPos::Saturated);
            continue;
        }
        let int_part = v.floor();
        let frac = v - &int_part;
        let n = int_part.to_integer().try_into().unwrap_or(i64::MAX);
        if frac.is_zero() {
            pos.push(ClockPos::At(n));
        } else {
            pos.push(ClockPos::In(n));
            fracs.push((frac, i));
        }
    }
    fracs.sort();
    let mut frac_order: Vec<BTreeSet<usize>> = Vec::new();
    let mut last: Option<Q> = None;
    for (f, i) in fracs {
        if last.as_ref() == Some(&f) {
            frac_order.last_mut().unwrap().insert(i);
        } else {
            frac_order.push(BTreeSet::from([i]));
            last = Some(f);
        }
    }
    ClockRegion { pos, frac_order }
}

/// The immediate time-successor; `None` for the unbounded region.
pub fn immediate_successor(region: &ClockRegion, max_consts: &[i64]) -> Option<ClockRegion> {
    if region.is_unbounded() {
        return None;
    }
    let mut next = region.clone();
    let at_clocks: Vec<usize> = region
        .pos
        .iter()
        .enumerate()
        .filter(|(_, p)| matches!(p, ClockPos::At(_)))
        .map(|(i, _)| i)
        .collect();
    if !at_clocks.is_empty() {
        // integer-valued clocks open into a fresh smallest-fraction group
        let mut group = BTreeSet::new();
        for i in at_clocks {
            let ClockPos::At(n) = region.pos[i] else { unreachable!() };
            if n >= max_consts[i] {
                next.pos[i] = ClockPos::Saturated;
            } else {
                next.pos[i] = ClockPos::In(n);
                group.insert(i);
            }
        }
        if !group.is_empty() {
            next.frac_order.insert(0, group);
        }
        Some(next)
    } else {
        // the clocks with the greatest fraction reach the next integer
        let group = next.frac_order.pop().expect("no integer clocks, so some fraction");
        for i in group {
            let ClockPos::In(n) = region.pos[i] else { unreachable!() };
            next.pos[i] = ClockPos::At(n + 1);
        }
        Some(next)
    }
}

/// The time-successor chain starting at the given region (inclusive) up
/// to the unbounded region, which is its own successor.
pub fn time_successors(region: &ClockRegion, max_consts: &[i64]) -> Vec<ClockRegion> {
    let mut chain = vec![region.clone()];
    let mut current = region.clone();
    while let Some(next) = immediate_successor(&current, max_consts) {
        chain.push(next.clone());
        current = next;
    }
    chain
}

/// Every clock region for the given maximal constants (used for counts
/// and exhaustive checks; the region automaton itself only materializes
/// reachable regions).
pub fn all_regions(max_consts: &[i64]) -> Vec<ClockRegion> {
    let n = max_consts.len();
    let mut result = Vec::new();
    // enumerate positions per clock, then orderings of fractional clocks
    fn rec(
        i: usize,
        n: usize,
        max_consts: &[i64],
        pos: &mut Vec<ClockPos>,
        result: &mut Vec<ClockRegion>,
    ) {
        if i == n {
            let fractional: Vec<usize> = pos
                .iter()
                .enumerate()
                .filter(|(_, p)| matches!(p, ClockPos::In(_)))
                .map(|(k, _)| k)
                .collect();
            for order in ordered_partitions(&fractional) {
                result.push(ClockRegion { pos: pos.clone(), frac_order: order });
            }
            return;
        }
        for v in 0..=max_consts[i] {
            pos.push(ClockPos::At(v));
            rec(i + 1, n, max_consts, pos, result);
            pos.pop();
            if v < max_consts[i] {
                pos.push(ClockPos::In(v));
                rec(i + 1, n, max_consts, pos, result);
                pos.pop();
            }
        }
        pos.push(ClockPos::Saturated);
        rec(i + 1, n, max_consts, pos, result);
        pos.pop();
    }
    let mut pos = Vec::new();
    rec(0, n, max_consts, &mut pos, &mut result);
    result.sort();
    result.dedup();
    result
}

/// Ordered partitions of a set into nonempty groups.
fn ordered_partitions(items: &[usize]) -> Vec<Vec<BTreeSet<usize>>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let first = items[0];
    let rest = &items[1..];
    let mut out = Vec::new();
    for partial in ordered_partitions(rest) {
        // insert `first` into an existing group or as a new group anywhere
        for g in 0..partial.len() {
            let mut next = partial.clone();
            next[g].insert(first);
            out.push(next);
        }
        for slot in 0..=partial.len() {
            let mut next = partial.clone();
            next.insert(slot, BTreeSet::from([first]));
            out.push(next);
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Region automaton of a timed automaton (an NFA over the TA's actions
/// plus the silent action), with the (location, region) pair per state
/// and the model edge behind each discrete transition.
pub struct RegionAutomaton {
    pub nfa: Nfa,
    pub states: Vec<(usize, ClockRegion)>,
    /// Per NFA edge: the model edge it came from (None for delays).
    pub provenance: Vec<Option<usize>>,
    pub max_consts: Vec<i64>,
}

/// Builds the reachable region automaton. The input must be energy-free:
/// energies are expected to have been compiled into the action alphabet
/// by the transformations.
pub fn build_region_automaton(ta: &GuardedMeta) -> Result<RegionAutomaton, CoreError> {
    if !ta.energies.is_empty() {
        return Err(CoreError::Unsupported(
            "region automaton requires an energy-free automaton; apply the transformations first"
                .into(),
        ));
    }
    let initial_loc = ta
        .initial_index()
        .ok_or_else(|| CoreError::Semantics("model has no initial location".into()))?;
    let max_consts = ta.max_clock_constants();
    let mut nfa = Nfa::new(ta.actions.clone());
    let mut states: Vec<(usize, ClockRegion)> = Vec::new();
    let mut provenance: Vec<Option<usize>> = Vec::new();
    let mut index: BTreeMap<(usize, ClockRegion), usize> = BTreeMap::new();

    let start = (initial_loc, ClockRegion::zero(ta.clocks.len()));
    let label = |loc: usize, r: &ClockRegion| -> String {
        format!("{} | {}", ta.locations[loc].name, r.describe(&ta.clocks, &max_consts))
    };
    index.insert(start.clone(), nfa.add_state(label(start.0, &start.1)));
    states.push(start.clone());
    let mut queue = VecDeque::from([start]);

    while let Some((loc, region)) = queue.pop_front() {
        let from = index[&(loc, region.clone())];
        if ta.locations[loc].is_final {
            nfa.accepting.insert(from);
            continue; // final regions have no outgoing transitions
        }
        let push_state =
            |loc: usize,
             r: ClockRegion,
             nfa: &mut Nfa,
             states: &mut Vec<(usize, ClockRegion)>,
             queue: &mut VecDeque<(usize, ClockRegion)>,
             index: &mut BTreeMap<(usize, ClockRegion), usize>| {
                let key = (loc, r);
                match index.get(&key) {
                    Some(id) => *id,
                    None => {
                        let id = nfa.add_state(label(key.0, &key.1));
                        index.insert(key.clone(), id);
                        states.push(key.clone());
                        queue.push_back(key);
                        id
                    }
                }
            };
        // delay transition to the immediate time-successor; the unbounded
        // region is its own successor
        match immediate_successor(&region, &max_consts) {
            Some(succ) => {
                let to = push_state(loc, succ, &mut nfa, &mut states, &mut queue, &mut index);
                nfa.add_edge(from, None, to);
                provenance.push(None);
            }
            None => {
                nfa.add_edge(from, None, from);
                provenance.push(None);
            }
        }
        // discrete transitions: representative evaluation is exact since
        // all guard and invariant atoms are uniform across a region
        let rep = region.representative(&max_consts);
        let rep_state = ConcreteState {
            location: loc,
            clocks: rep,
            energies: Vec::new(),
        };
        if !crate::semantics::satisfies(&rep_state, &ta.locations[loc].invariant) {
            continue; // no discrete step can fire from outside the invariant
        }
        for (edge_idx, edge) in ta.edges_from(loc) {
            if !crate::semantics::satisfies(&rep_state, &edge.guard) {
                continue;
            }
            let mut reset = rep_state.clocks.clone();
            for c in &edge.resets {
                reset[*c] = Q::zero();
            }
            let target_region = clock_region_of(&reset, &max_consts);
            let target_state = ConcreteState {
                location: edge.target,
                clocks: reset,
                energies: Vec::new(),
            };
            if !crate::semantics::satisfies(&target_state, &ta.locations[edge.target].invariant) {
                continue;
            }
            let to = push_state(
                edge.target,
                target_region,
                &mut nfa,
                &mut states,
                &mut queue,
                &mut index,
            );
            nfa.add_edge(from, edge.action, to);
            provenance.push(Some(edge_idx));
        }
    }
    // mark accepting states discovered without expansion
    for (i, (loc, _)) in states.iter().enumerate() {
        if ta.locations[*loc].is_final {
            nfa.accepting.insert(i);
        }
    }
    Ok(RegionAutomaton { nfa, states, provenance, max_consts })
}

/// Number of clock regions for a single clock with max constant m.
pub fn single_clock_region_count(m: i64) -> usize {
    all_regions(&[m]).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::q_ratio;

    #[test]
    fn single_clock_region_counts() {
        assert_eq!(single_clock_region_count(3), 8);
        assert_eq!(single_clock_region_count(0), 2);
    }

    #[test]
    fn region_of_examples() {
        // single clock, M = 3, x = 1.5 -> 1 < x < 2
        let r = clock_region_of(&[q_ratio(3, 2)], &[3]);
        assert_eq!(r.pos, vec![ClockPos::In(1)]);
        // x = 0 -> initial region with zero fraction
        let r0 = clock_region_of(&[q_int(0)], &[3]);
        assert_eq!(r0, ClockRegion::zero(1));
        // fraction order distinguishes
        let a = clock_region_of(&[q_ratio(3, 10), q_ratio(7, 10)], &[1, 1]);
        let b = clock_region_of(&[q_ratio(4, 10), q_ratio(9, 10)], &[1, 1]);
        let c = clock_region_of(&[q_ratio(7, 10), q_ratio(3, 10)], &[1, 1]);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn successors_single_clock() {
        let m = [3i64];
        let r1 = clock_region_of(&[q_int(1)], &m);
        let succ = immediate_successor(&r1, &m).unwrap();
        assert_eq!(succ.pos, vec![ClockPos::In(1)]);
        let chain = time_successors(&ClockRegion::zero(1), &m);
        assert_eq!(chain.len(), 8);
        assert!(chain.last().unwrap().is_unbounded());
        let unbounded = chain.last().unwrap().clone();
        assert!(immediate_successor(&unbounded, &m).is_none());
        assert_eq!(time_successors(&unbounded, &m).len(), 1);
    }

    #[test]
    fn equal_fractions_merge_and_split() {
        let m = [2i64, 2i64];
        // x = y = 0.5: same fraction group
        let r = clock_region_of(&[q_ratio(1, 2), q_ratio(1, 2)], &m);
        assert_eq!(r.frac_order.len(), 1);
        // successor: both reach 1 together
        let s = immediate_successor(&r, &m).unwrap();
        assert_eq!(s.pos, vec![ClockPos::At(1), ClockPos::At(1)]);
    }
}
