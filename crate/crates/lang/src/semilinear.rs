//! Linear and semilinear sets over natural-number vectors, Parikh images
//! of regular languages, and the decision services built on them.

use std::collections::{BTreeSet, VecDeque};

use num::bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::nfa::{Nfa, StateId};
use crate::presburger::{self, Formula, Term};
use crate::LangError;

/// `base + N-combinations of periods`, all over N^dim.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinearSet {
    pub base: Vec<u64>,
    pub periods: Vec<Vec<u64>>,
}

impl LinearSet {
    pub fn point(base: Vec<u64>) -> Self {
        LinearSet { base, periods: Vec::new() }
    }

    fn normalized(mut self) -> Self {
        self.periods.retain(|p| p.iter().any(|x| *x > 0));
        self.periods.sort();
        self.periods.dedup();
        self
    }
}

/// Finite union of linear sets of equal dimension. An empty component
/// list denotes the empty set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemilinearSet {
    pub dim: usize,
    pub components: Vec<LinearSet>,
}

impl SemilinearSet {
    pub fn empty(dim: usize) -> Self {
        SemilinearSet { dim, components: Vec::new() }
    }

    pub fn singleton(v: Vec<u64>) -> Self {
        let dim = v.len();
        SemilinearSet { dim, components: vec![LinearSet::point(v)] }
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn add_component(&mut self, ls: LinearSet) {
        assert_eq!(ls.base.len(), self.dim);
        let ls = ls.normalized();
        if !self.components.contains(&ls) {
            self.components.push(ls);
        }
    }

    pub fn normalize(&mut self) {
        let comps = std::mem::take(&mut self.components);
        let set: BTreeSet<LinearSet> = comps.into_iter().map(LinearSet::normalized).collect();
        self.components = set.into_iter().collect();
    }
}

fn check_dim(s: &SemilinearSet, v: &[u64]) -> Result<(), LangError> {
    if s.dim != v.len() {
        return Err(LangError::DimensionMismatch(format!(
            "set dimension {} vs vector dimension {}",
            s.dim,
            v.len()
        )));
    }
    Ok(())
}

fn linear_member(ls: &LinearSet, v: &[u64]) -> bool {
    // DFS over period multiplicities with residual pruning; every period
    // is nonzero so each choice strictly decreases some coordinate sum.
    fn go(residual: &mut Vec<i64>, periods: &[Vec<u64>]) -> bool {
        if residual.iter().all(|x| *x == 0) {
            return true;
        }
        let Some(p) = periods.first() else {
            return false;
        };
        // max multiplicity for the first period
        let mut max_k = i64::MAX;
        for (i, c) in p.iter().enumerate() {
            if *c > 0 {
                max_k = max_k.min(residual[i] / *c as i64);
            }
        }
        for k in 0..=max_k {
            if k > 0 {
                for (i, c) in p.iter().enumerate() {
                    residual[i] -= *c as i64;
                }
                if residual.iter().any(|x| *x < 0) {
                    for (i, c) in p.iter().enumerate() {
                        residual[i] += k * *c as i64;
                    }
                    return false;
                }
            }
            if go(residual, &periods[1..]) {
                for (i, c) in p.iter().enumerate() {
                    residual[i] += k * *c as i64;
                }
                return true;
            }
        }
        for (i, c) in p.iter().enumerate() {
            residual[i] += max_k.max(0) * *c as i64;
        }
        false
    }
    let mut residual: Vec<i64> = Vec::with_capacity(v.len());
    for (i, x) in v.iter().enumerate() {
        let r = *x as i64 - ls.base[i] as i64;
        if r < 0 {
            return false;
        }
        residual.push(r);
    }
    go(&mut residual, &ls.periods)
}

/// Membership of a vector in a semilinear set.
pub fn slset_member(s: &SemilinearSet, v: &[u64]) -> Result<bool, LangError> {
    check_dim(s, v)?;
    Ok(s.components.iter().any(|ls| linear_member(ls, v)))
}

/// Existential Presburger sentence for `base_a + Pa*lambda = base_b + Pb*mu`
/// with all multipliers in N.
fn pair_intersection_sentence(a: &LinearSet, b: &LinearSet) -> Formula {
    let dim = a.base.len();
    let na = a.periods.len();
    let nb = b.periods.len();
    // variables 0..na: lambda, na..na+nb: mu
    let mut conj = Vec::new();
    for v in 0..na + nb {
        conj.push(presburger::geq(Term::var(v), Term::constant(0)));
    }
    for i in 0..dim {
        let mut lhs = Term::constant(a.base[i] as i64);
        for (j, p) in a.periods.iter().enumerate() {
            lhs = lhs.add(&Term::scaled_var(j, p[i] as i64));
        }
        let mut rhs = Term::constant(b.base[i] as i64);
        for (j, p) in b.periods.iter().enumerate() {
            rhs = rhs.add(&Term::scaled_var(na + j, p[i] as i64));
        }
        conj.push(presburger::eq(lhs, rhs));
    }
    let mut f = presburger::and(conj);
    for v in (0..na + nb).rev() {
        f = presburger::exists(v, f);
    }
    f
}

/// A vector in the intersection, or `None` when the intersection is empty.
/// Emptiness is decided per component pair by Presburger arithmetic; the
/// witness itself is recovered by a staged norm search that terminates
/// because a solution is known to exist.
pub fn slset_intersection_witness(
    a: &SemilinearSet,
    b: &SemilinearSet,
) -> Result<Option<Vec<u64>>, LangError> {
    if a.dim != b.dim {
        return Err(LangError::DimensionMismatch(format!(
            "{} vs {}",
            a.dim, b.dim
        )));
    }
    for la in &a.components {
        for lb in &b.components {
            if presburger::decide(&pair_intersection_sentence(la, lb))? {
                // staged search over lambda by increasing l1-norm
                for norm in 0..=100_000u64 {
                    if let Some(v) = search_vector_at_norm(la, norm, &mut |v| {
                        linear_member(lb, v)
                    }) {
                        return Ok(Some(v));
                    }
                }
                return Err(LangError::Resource(
                    "intersection witness search exceeded norm bound".into(),
                ));
            }
        }
    }
    Ok(None)
}

/// Enumerate vectors of `ls` whose multiplier l1-norm equals `norm`,
/// returning the first accepted by `pred`.
fn search_vector_at_norm(
    ls: &LinearSet,
    norm: u64,
    pred: &mut impl FnMut(&[u64]) -> bool,
) -> Option<Vec<u64>> {
    fn go(
        ls: &LinearSet,
        idx: usize,
        left: u64,
        acc: &mut Vec<u64>,
        pred: &mut impl FnMut(&[u64]) -> bool,
    ) -> Option<Vec<u64>> {
        if idx == ls.periods.len() {
            if left == 0 && pred(acc) {
                return Some(acc.clone());
            }
            return None;
        }
        // remaining periods can absorb what's left
        for k in 0..=left {
            if k > 0 {
                for (i, c) in ls.periods[idx].iter().enumerate() {
                    acc[i] += c * 1;
                }
            }
            if let Some(v) = go(ls, idx + 1, left - k, acc, pred) {
                for _ in 0..k {
                    for (i, c) in ls.periods[idx].iter().enumerate() {
                        acc[i] -= c;
                    }
                }
                return Some(v);
            }
        }
        for (i, c) in ls.periods[idx].iter().enumerate() {
            acc[i] -= c * left;
        }
        None
    }
    if ls.periods.is_empty() {
        if norm == 0 && pred(&ls.base) {
            return Some(ls.base.clone());
        }
        return None;
    }
    let mut acc = ls.base.clone();
    go(ls, 0, norm, &mut acc, pred)
}

fn membership_formula(s: &SemilinearSet, vec_vars: &[usize], next_var: &mut usize) -> Formula {
    let mut disj = Vec::new();
    for ls in &s.components {
        let m = ls.periods.len();
        let mults: Vec<usize> = (0..m).map(|i| *next_var + i).collect();
        *next_var += m;
        let mut conj = Vec::new();
        for v in &mults {
            conj.push(presburger::geq(Term::var(*v), Term::constant(0)));
        }
        for i in 0..s.dim {
            let mut rhs = Term::constant(ls.base[i] as i64);
            for (j, p) in ls.periods.iter().enumerate() {
                rhs = rhs.add(&Term::scaled_var(mults[j], p[i] as i64));
            }
            conj.push(presburger::eq(Term::var(vec_vars[i]), rhs));
        }
        let mut f = presburger::and(conj);
        for v in mults.into_iter().rev() {
            f = presburger::exists(v, f);
        }
        disj.push(f);
    }
    presburger::or(disj)
}

/// `subset included in superset`, decided by a Presburger sentence with a
/// universally quantified vector. On failure, a concrete counterexample
/// vector is produced by staged bounded search.
pub fn slset_includes(
    superset: &SemilinearSet,
    subset: &SemilinearSet,
) -> Result<(bool, Option<Vec<u64>>), LangError> {
    if superset.dim != subset.dim {
        return Err(LangError::DimensionMismatch(format!(
            "{} vs {}",
            superset.dim, subset.dim
        )));
    }
    if subset.is_empty() {
        return Ok((true, None));
    }
    let dim = subset.dim;
    let mut next_var = dim;
    let vec_vars: Vec<usize> = (0..dim).collect();
    let in_sub = membership_formula(subset, &vec_vars, &mut next_var);
    let in_sup = membership_formula(superset, &vec_vars, &mut next_var);
    let mut nonneg = Vec::new();
    for v in &vec_vars {
        nonneg.push(presburger::geq(Term::var(*v), Term::constant(0)));
    }
    let body = presburger::or(vec![
        Formula::Not(Box::new(presburger::and(nonneg))),
        Formula::Not(Box::new(in_sub)),
        in_sup,
    ]);
    let mut sentence = body;
    for v in vec_vars.into_iter().rev() {
        sentence = presburger::forall(v, sentence);
    }
    if presburger::decide(&sentence)? {
        return Ok((true, None));
    }
    // counterexample: vector of subset not in superset; must exist
    for norm in 0..=100_000u64 {
        for ls in &subset.components {
            if let Some(v) = search_vector_at_norm(ls, norm, &mut |v| {
                !superset.components.iter().any(|s| linear_member(s, v))
            }) {
                return Ok((false, Some(v)));
            }
        }
    }
    Err(LangError::Resource(
        "inclusion counterexample search exceeded norm bound".into(),
    ))
}

pub const DEFAULT_PARIKH_STATE_CAP: usize = 5000;
const PARIKH_ENUM_CAP: usize = 2_000_000;

/// Exact Parikh image of the language of an NFA, with letter counts taken
/// over `counted_alphabet` in order. Symbols outside the counted alphabet
/// are projected to epsilon first.
///
/// Computed on the epsilon-eliminated, trimmed automaton by enumerating,
/// per accepting state, simple paths (bases) and the sets of simple
/// cycles connected to them (periods; one traversal of each chosen cycle
/// is folded into the base so that every period is genuinely reachable).
pub fn parikh_of_nfa(
    nfa: &Nfa,
    counted_alphabet: &[String],
    state_cap: usize,
) -> Result<SemilinearSet, LangError> {
    let dim = counted_alphabet.len();
    let projected = nfa.project(counted_alphabet);
    let clean = projected.eliminate_epsilon().trim();
    if clean.n_states() > state_cap {
        return Err(LangError::Resource(format!(
            "parikh extraction: {} states exceeds cap {}",
            clean.n_states(),
            state_cap
        )));
    }
    let mut result = SemilinearSet::empty(dim);
    if clean.accepting.is_empty() {
        return Ok(result);
    }

    let adj = {
        let mut adj: Vec<Vec<(usize, StateId)>> = vec![Vec::new(); clean.n_states()];
        for (f, l, t) in &clean.edges {
            adj[*f].push((l.expect("epsilon-free"), *t));
        }
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
        }
        adj
    };

    // all simple cycles: DFS from each anchor state, only visiting states
    // >= anchor, closing back at the anchor (deduplicates rotations)
    let mut cycles: Vec<(Vec<u64>, BTreeSet<StateId>)> = Vec::new();
    let mut budget = PARIKH_ENUM_CAP;
    for anchor in 0..clean.n_states() {
        let mut vec0 = vec![0u64; dim];
        let mut on_path = BTreeSet::from([anchor]);
        enumerate_cycles(
            &adj,
            anchor,
            anchor,
            &mut on_path,
            &mut vec0,
            &mut cycles,
            &mut budget,
        )?;
    }
    // dedup cycles with identical vector and support
    let cycle_set: BTreeSet<(Vec<u64>, BTreeSet<StateId>)> = cycles.into_iter().collect();
    let cycles: Vec<(Vec<u64>, BTreeSet<StateId>)> = cycle_set.into_iter().collect();

    // simple paths from the initial state to each accepting state
    let mut paths: Vec<(Vec<u64>, BTreeSet<StateId>)> = Vec::new();
    let mut vec0 = vec![0u64; dim];
    let mut on_path = BTreeSet::from([clean.initial]);
    enumerate_paths(
        &adj,
        clean.initial,
        &clean.accepting,
        &mut on_path,
        &mut vec0,
        &mut paths,
        &mut budget,
    )?;

    for (pvec, pstates) in &paths {
        // cycles transitively connected to this path
        let mut relevant: Vec<usize> = Vec::new();
        let mut connected_states = pstates.clone();
        loop {
            let mut changed = false;
            for (i, (_, cstates)) in cycles.iter().enumerate() {
                if !relevant.contains(&i) && !cstates.is_disjoint(&connected_states) {
                    relevant.push(i);
                    connected_states.extend(cstates.iter().copied());
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if relevant.len() > 16 {
            return Err(LangError::Resource(format!(
                "parikh extraction: {} cycles on one path exceeds subset cap",
                relevant.len()
            )));
        }
        // subsets of relevant cycles that stay connected with the path
        let n = relevant.len();
        'subsets: for mask in 0..(1u32 << n) {
            let chosen: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| relevant[i]).collect();
            // connectivity: grow from path states
            let mut reach = pstates.clone();
            let mut remaining: Vec<usize> = chosen.clone();
            loop {
                let before = remaining.len();
                remaining.retain(|ci| {
                    if cycles[*ci].1.is_disjoint(&reach) {
                        true
                    } else {
                        reach.extend(cycles[*ci].1.iter().copied());
                        false
                    }
                });
                if remaining.is_empty() {
                    break;
                }
                if remaining.len() == before {
                    continue 'subsets; // disconnected subset
                }
            }
            let mut base = pvec.clone();
            let mut periods = Vec::new();
            for ci in &chosen {
                for (i, c) in cycles[*ci].0.iter().enumerate() {
                    base[i] += c;
                }
                periods.push(cycles[*ci].0.clone());
            }
            result.add_component(LinearSet { base, periods });
        }
    }
    result.normalize();
    Ok(result)
}

fn enumerate_cycles(
    adj: &[Vec<(usize, StateId)>],
    anchor: StateId,
    current: StateId,
    on_path: &mut BTreeSet<StateId>,
    vec: &mut Vec<u64>,
    out: &mut Vec<(Vec<u64>, BTreeSet<StateId>)>,
    budget: &mut usize,
) -> Result<(), LangError> {
    for (sym, t) in &adj[current] {
        if *budget == 0 {
            return Err(LangError::Resource(
                "parikh extraction: cycle enumeration budget exhausted".into(),
            ));
        }
        *budget -= 1;
        if *t == anchor {
            vec[*sym] += 1;
            out.push((vec.clone(), on_path.clone()));
            vec[*sym] -= 1;
        } else if *t > anchor && !on_path.contains(t) {
            on_path.insert(*t);
            vec[*sym] += 1;
            enumerate_cycles(adj, anchor, *t, on_path, vec, out, budget)?;
            vec[*sym] -= 1;
            on_path.remove(t);
        }
    }
    Ok(())
}

fn enumerate_paths(
    adj: &[Vec<(usize, StateId)>],
    current: StateId,
    accepting: &BTreeSet<StateId>,
    on_path: &mut BTreeSet<StateId>,
    vec: &mut Vec<u64>,
    out: &mut Vec<(Vec<u64>, BTreeSet<StateId>)>,
    budget: &mut usize,
) -> Result<(), LangError> {
    if accepting.contains(&current) {
        out.push((vec.clone(), on_path.clone()));
    }
    for (sym, t) in &adj[current] {
        if *budget == 0 {
            return Err(LangError::Resource(
                "parikh extraction: path enumeration budget exhausted".into(),
            ));
        }
        *budget -= 1;
        if !on_path.contains(t) {
            on_path.insert(*t);
            vec[*sym] += 1;
            enumerate_paths(adj, *t, accepting, on_path, vec, out, budget)?;
            vec[*sym] -= 1;
            on_path.remove(t);
        }
    }
    Ok(())
}

/// Brute-force Parikh vectors of all accepted words up to a word length,
/// used by tests as the independent oracle for `parikh_of_nfa`.
pub fn parikh_vectors_by_words(
    nfa: &Nfa,
    counted_alphabet: &[String],
    max_len: usize,
) -> BTreeSet<Vec<u64>> {
    let projected = nfa.project(counted_alphabet);
    let mut out = BTreeSet::new();
    for word in projected.enumerate_words(max_len) {
        let mut v = vec![0u64; counted_alphabet.len()];
        for s in word {
            v[s] += 1;
        }
        out.insert(v);
    }
    out
}

/// All vectors of a semilinear set with l1-norm at most `max_norm`
/// (finite enumeration used for cross-checks).
pub fn slset_vectors_up_to(s: &SemilinearSet, max_norm: u64) -> BTreeSet<Vec<u64>> {
    let mut out = BTreeSet::new();
    let dim = s.dim;
    // enumerate candidate vectors by total sum
    let mut queue: VecDeque<Vec<u64>> = VecDeque::new();
    queue.push_back(vec![0; dim]);
    let mut seen: BTreeSet<Vec<u64>> = BTreeSet::from([vec![0; dim]]);
    while let Some(v) = queue.pop_front() {
        let norm: u64 = v.iter().sum();
        if norm > max_norm {
            continue;
        }
        if slset_member(s, &v).unwrap_or(false) {
            out.insert(v.clone());
        }
        if norm < max_norm {
            for i in 0..dim {
                let mut w = v.clone();
                w[i] += 1;
                if seen.insert(w.clone()) {
                    queue.push_back(w);
                }
            }
        }
    }
    out
}

/// Convenience: a vector of BigInt counts to u64, used by tests.
pub fn to_u64_vec(v: &[BigInt]) -> Option<Vec<u64>> {
    use num::ToPrimitive;
    v.iter().map(|x| x.to_u64()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sl(components: Vec<(Vec<u64>, Vec<Vec<u64>>)>, dim: usize) -> SemilinearSet {
        let mut s = SemilinearSet::empty(dim);
        for (base, periods) in components {
            s.add_component(LinearSet { base, periods });
        }
        s
    }

    #[test]
    fn member_examples() {
        // alpha(1,0)
        let a = sl(vec![(vec![0, 0], vec![vec![1, 0]])], 2);
        assert!(slset_member(&a, &[1, 0]).unwrap());
        assert!(!slset_member(&a, &[0, 1]).unwrap());
        // (1,0) + alpha(1,1)
        let b = sl(vec![(vec![1, 0], vec![vec![1, 1]])], 2);
        assert!(slset_member(&b, &[1, 0]).unwrap());
        assert!(slset_member(&b, &[3, 2]).unwrap());
        assert!(!slset_member(&b, &[0, 0]).unwrap());
        // (3,5) in (0,2)+alpha(1,1): lambda = 3
        let c = sl(vec![(vec![0, 2], vec![vec![1, 1]])], 2);
        assert!(slset_member(&c, &[3, 5]).unwrap());
    }

    #[test]
    fn intersection_examples() {
        // (0,1)+alpha(1,1) vs alpha(1,0): empty
        let a = sl(vec![(vec![0, 1], vec![vec![1, 1]])], 2);
        let b = sl(vec![(vec![0, 0], vec![vec![1, 0]])], 2);
        assert_eq!(slset_intersection_witness(&a, &b).unwrap(), None);
        // (1,0)+alpha(1,1) vs alpha(1,0): witness (1,0)
        let c = sl(vec![(vec![1, 0], vec![vec![1, 1]])], 2);
        let w = slset_intersection_witness(&c, &b).unwrap().unwrap();
        assert_eq!(w, vec![1, 0]);
        // anything vs empty
        let empty = SemilinearSet::empty(2);
        assert_eq!(slset_intersection_witness(&a, &empty).unwrap(), None);
    }

    #[test]
    fn inclusion_examples() {
        // N includes {2}
        let nat = sl(vec![(vec![0], vec![vec![1]])], 1);
        let two = sl(vec![(vec![2], vec![])], 1);
        let (ok, _) = slset_includes(&nat, &two).unwrap();
        assert!(ok);
        let (ok, cex) = slset_includes(&two, &nat).unwrap();
        assert!(!ok);
        let cex = cex.unwrap();
        assert!(cex == vec![0] || cex == vec![1]);
        // evens do not include all naturals
        let evens = sl(vec![(vec![0], vec![vec![2]])], 1);
        let (ok, cex) = slset_includes(&evens, &nat).unwrap();
        assert!(!ok);
        assert_eq!(cex.unwrap(), vec![1]);
        // s includes s
        let (ok, _) = slset_includes(&nat, &nat).unwrap();
        assert!(ok);
    }
}
